#pragma once

#include "detpomdp/core.hpp"
#include "detpomdp/model.hpp"
#include "detpomdp/model_io.hpp"
#include "detpomdp/belief.hpp"
#include "detpomdp/criterion.hpp"
#include "detpomdp/policy.hpp"
#include "detpomdp/andor_graph.hpp"
#include "detpomdp/solvers.hpp"
#include "detpomdp/policy_io.hpp"
#include "detpomdp/permutation.hpp"
#include "detpomdp/analysis.hpp"
#include "detpomdp/domains.hpp"
