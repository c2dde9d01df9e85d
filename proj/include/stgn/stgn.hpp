/*
 * Copyright 2026 The STGN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Everything in one include.
#include "stgn/ad/ops.hpp"
#include "stgn/ad/tape.hpp"
#include "stgn/caching.hpp"
#include "stgn/config.hpp"
#include "stgn/error.hpp"
#include "stgn/experiment.hpp"
#include "stgn/graph_store.hpp"
#include "stgn/io.hpp"
#include "stgn/metrics.hpp"
#include "stgn/model.hpp"
#include "stgn/params.hpp"
#include "stgn/report.hpp"
#include "stgn/semantics.hpp"
#include "stgn/structural.hpp"
#include "stgn/synthetic.hpp"
#include "stgn/temporal.hpp"
#include "stgn/training.hpp"
