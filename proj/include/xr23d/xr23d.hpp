/*
 * xr23d: biplanar X-ray to 3D bone reconstruction benchmark toolkit
 *
 * Copyright 2026 The xr23d Authors
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

#include "xr23d/core/error.hpp"
#include "xr23d/core/format.hpp"
#include "xr23d/core/parallel.hpp"
#include "xr23d/core/random.hpp"

#include "xr23d/volume/components.hpp"
#include "xr23d/volume/crop.hpp"
#include "xr23d/volume/distance_transform.hpp"
#include "xr23d/volume/labels.hpp"
#include "xr23d/volume/morphology.hpp"
#include "xr23d/volume/nifti.hpp"
#include "xr23d/volume/resample.hpp"
#include "xr23d/volume/surface.hpp"
#include "xr23d/volume/volume.hpp"

#include "xr23d/ingestion/config.hpp"
#include "xr23d/ingestion/curation.hpp"
#include "xr23d/ingestion/manifest.hpp"
#include "xr23d/ingestion/prepare.hpp"

#include "xr23d/drr/image_io.hpp"
#include "xr23d/drr/projection.hpp"

#include "xr23d/metrics/segmentation_metrics.hpp"

#include "xr23d/morphometry/femur.hpp"
#include "xr23d/morphometry/fitting.hpp"
#include "xr23d/morphometry/pelvis.hpp"
#include "xr23d/morphometry/vertebra.hpp"

#include "xr23d/bench/aggregate.hpp"
#include "xr23d/bench/domain_shift.hpp"
#include "xr23d/bench/evaluation.hpp"
#include "xr23d/bench/ranking.hpp"
#include "xr23d/bench/reports.hpp"

#include "xr23d/phantom/dataset.hpp"
#include "xr23d/phantom/femur.hpp"
#include "xr23d/phantom/pelvis.hpp"
#include "xr23d/phantom/vertebra.hpp"
