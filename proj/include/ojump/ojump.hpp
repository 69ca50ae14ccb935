// Copyright 2026 The ojump Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ojump/config.hpp"
#include "ojump/ensemble.hpp"
#include "ojump/error.hpp"
#include "ojump/fft.hpp"
#include "ojump/grid.hpp"
#include "ojump/io.hpp"
#include "ojump/master.hpp"
#include "ojump/noise.hpp"
#include "ojump/rng.hpp"
#include "ojump/unravel.hpp"
