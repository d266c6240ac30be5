// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The patchtriage Authors

#pragma once

#include "patchtriage/clusterlab.hpp"
#include "patchtriage/corpus.hpp"
#include "patchtriage/embedding.hpp"
#include "patchtriage/error.hpp"
#include "patchtriage/metrics.hpp"
#include "patchtriage/pipeline.hpp"
#include "patchtriage/predictor.hpp"
#include "patchtriage/simindex.hpp"
#include "patchtriage/textprep.hpp"
