// Copyright 2026 The LaFee Authors
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

#include "lafee/analysis.hpp"
#include "lafee/cell.hpp"
#include "lafee/checkpoint.hpp"
#include "lafee/churn.hpp"
#include "lafee/domain.hpp"
#include "lafee/errors.hpp"
#include "lafee/ingest.hpp"
#include "lafee/lafee_model.hpp"
#include "lafee/lstm.hpp"
#include "lafee/synth.hpp"
#include "lafee/tensor.hpp"
#include "lafee/train.hpp"
