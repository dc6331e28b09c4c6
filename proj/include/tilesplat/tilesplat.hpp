// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tilesplat/core.hpp"
#include "tilesplat/image_io.hpp"
#include "tilesplat/metrics.hpp"
#include "tilesplat/oracle.hpp"
#include "tilesplat/pipeline.hpp"
#include "tilesplat/projection.hpp"
#include "tilesplat/render.hpp"
#include "tilesplat/scene.hpp"
#include "tilesplat/scene_io.hpp"
#include "tilesplat/tiling.hpp"
