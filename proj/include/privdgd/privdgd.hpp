// Copyright 2026 The privdgd Authors
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


// Everything at once.

#ifndef PRIVDGD_PRIVDGD_HPP_
#define PRIVDGD_PRIVDGD_HPP_

#include "privdgd/adversary.hpp"
#include "privdgd/analysis.hpp"
#include "privdgd/common.hpp"
#include "privdgd/engine.hpp"
#include "privdgd/harness.hpp"
#include "privdgd/io.hpp"
#include "privdgd/objectives.hpp"
#include "privdgd/random.hpp"
#include "privdgd/schedules.hpp"
#include "privdgd/topology.hpp"

#endif  // PRIVDGD_PRIVDGD_HPP_
