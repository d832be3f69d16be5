#pragma once

#include "coarse_trees/bass_serre.hpp"
#include "coarse_trees/config.hpp"
#include "coarse_trees/errors.hpp"
#include "coarse_trees/graph.hpp"
#include "coarse_trees/height.hpp"
#include "coarse_trees/invariants.hpp"
#include "coarse_trees/io.hpp"
#include "coarse_trees/local_type.hpp"
#include "coarse_trees/oriented_tree.hpp"
#include "coarse_trees/qi_builder.hpp"
#include "coarse_trees/tree_path.hpp"
#include "coarse_trees/warped_metric.hpp"
