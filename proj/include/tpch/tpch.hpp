#pragma once

#include "tpch/datasets.hpp"
#include "tpch/discrete_cluster.hpp"
#include "tpch/error.hpp"
#include "tpch/kernelizer.hpp"
#include "tpch/metrics.hpp"
#include "tpch/pipeline.hpp"
#include "tpch/solver.hpp"
#include "tpch/tensor3.hpp"
#include "tpch/tsvd.hpp"
