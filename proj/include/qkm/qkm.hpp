// Copyright 2026 The QKM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Umbrella header.

#include "qkm/encoders.hpp"
#include "qkm/errors.hpp"
#include "qkm/fft.hpp"
#include "qkm/fit.hpp"
#include "qkm/layout.hpp"
#include "qkm/metrics.hpp"
#include "qkm/model.hpp"
#include "qkm/parallel.hpp"
#include "qkm/relative_error.hpp"
#include "qkm/rng.hpp"
#include "qkm/systems.hpp"
#include "qkm/trajectory_io.hpp"
#include "qkm/unitary.hpp"
