// Copyright 2026 The qmetro Authors
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

#include "qmetro/bounds.hpp"
#include "qmetro/commands.hpp"
#include "qmetro/config.hpp"
#include "qmetro/csv.hpp"
#include "qmetro/error.hpp"
#include "qmetro/experiment.hpp"
#include "qmetro/infer.hpp"
#include "qmetro/numkernel.hpp"
#include "qmetro/povm.hpp"
#include "qmetro/probe.hpp"
#include "qmetro/sdp.hpp"
#include "qmetro/seed.hpp"
#include "qmetro/sim.hpp"
#include "qmetro/synth.hpp"
