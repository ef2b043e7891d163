// Copyright 2026 The celebbasis Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "celebbasis/backends.hpp"
#include "celebbasis/binary_io.hpp"
#include "celebbasis/celeb_basis.hpp"
#include "celebbasis/embedding_dictionary.hpp"
#include "celebbasis/error.hpp"
#include "celebbasis/generation_eval.hpp"
#include "celebbasis/identity_mapper.hpp"
#include "celebbasis/image.hpp"
#include "celebbasis/noise_schedule.hpp"
#include "celebbasis/prompt.hpp"
#include "celebbasis/rng.hpp"
#include "celebbasis/trainer.hpp"
#include "celebbasis/types.hpp"
