// Copyright 2026 the streamprofile authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "streamprofile/anchors.hpp"
#include "streamprofile/buffer.hpp"
#include "streamprofile/chat.hpp"
#include "streamprofile/cluster.hpp"
#include "streamprofile/core.hpp"
#include "streamprofile/embedding.hpp"
#include "streamprofile/filter.hpp"
#include "streamprofile/harness.hpp"
#include "streamprofile/ingest.hpp"
#include "streamprofile/io.hpp"
#include "streamprofile/metrics.hpp"
#include "streamprofile/pipeline.hpp"
#include "streamprofile/privacy.hpp"
#include "streamprofile/random.hpp"
#include "streamprofile/report.hpp"
#include "streamprofile/synth.hpp"
#include "streamprofile/tasks.hpp"
#include "streamprofile/text.hpp"
#include "streamprofile/trending.hpp"
