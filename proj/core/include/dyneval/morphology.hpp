// Copyright 2026 The DynEval Authors.
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

#include "dyneval/image.hpp"

namespace dyneval {

// Binary morphology with a square structuring element of odd side `side`,
// centred on the pixel. Pixels outside the raster count as 0 for both
// operations, so erosion clears a border band of width side/2.
Mask dilate(const Mask& mask, int side);
Mask erode(const Mask& mask, int side);

// dilate(mask) minus erode(mask): the boundary band of the mask.
Mask morphological_gradient(const Mask& mask, int side);

}  // namespace dyneval
