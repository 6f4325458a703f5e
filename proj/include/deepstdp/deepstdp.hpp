#pragma once

// Umbrella header for the whole library.

#include "config.hpp"
#include "convnet.hpp"
#include "cost.hpp"
#include "dataset.hpp"
#include "encoding.hpp"
#include "idx.hpp"
#include "kmeans.hpp"
#include "log_io.hpp"
#include "metrics.hpp"
#include "pca.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "run_config_io.hpp"
#include "snn.hpp"
#include "synth.hpp"
#include "tensor.hpp"
#include "tensor_file.hpp"
