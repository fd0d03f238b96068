/*
 * Copyright 2026 The detcfg Authors.
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

#include "detcfg/anchors.hpp"
#include "detcfg/cluster.hpp"
#include "detcfg/config.hpp"
#include "detcfg/dataset.hpp"
#include "detcfg/dataset_io.hpp"
#include "detcfg/eval.hpp"
#include "detcfg/featuremap.hpp"
#include "detcfg/matching.hpp"
#include "detcfg/pca.hpp"
#include "detcfg/pipeline.hpp"
#include "detcfg/report.hpp"
#include "detcfg/sampling.hpp"
