/*
 * Copyright (c) 2026, The sacm Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "sacm/confidence.hpp"
#include "sacm/core_state.hpp"
#include "sacm/denoiser.hpp"
#include "sacm/error.hpp"
#include "sacm/hash.hpp"
#include "sacm/modulation.hpp"
#include "sacm/remote_client.hpp"
#include "sacm/run_config.hpp"
#include "sacm/scheduler.hpp"
#include "sacm/stats.hpp"
#include "sacm/synthetic_denoiser.hpp"
#include "sacm/table_denoiser.hpp"
#include "sacm/trace_io.hpp"
#include "sacm/types.hpp"
#include "sacm/wire.hpp"
