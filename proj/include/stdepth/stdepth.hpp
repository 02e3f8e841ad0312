#pragma once

#include "stdepth/autodiff.hpp"
#include "stdepth/core.hpp"
#include "stdepth/geometry.hpp"
#include "stdepth/io.hpp"
#include "stdepth/losses.hpp"
#include "stdepth/metrics.hpp"
#include "stdepth/observability.hpp"
#include "stdepth/optim.hpp"
#include "stdepth/rng.hpp"
#include "stdepth/sampler.hpp"
#include "stdepth/synth.hpp"
