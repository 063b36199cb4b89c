#ifndef DEUCE_DEUCE_HPP
#define DEUCE_DEUCE_HPP

#include "deuce/acquisition.hpp"
#include "deuce/baselines.hpp"
#include "deuce/common.hpp"
#include "deuce/density_cluster.hpp"
#include "deuce/dng.hpp"
#include "deuce/knn_graph.hpp"
#include "deuce/metrics.hpp"
#include "deuce/pipeline.hpp"
#include "deuce/prediction.hpp"
#include "deuce/tensor_io.hpp"

#endif // DEUCE_DEUCE_HPP
