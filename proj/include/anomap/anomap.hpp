#pragma once

// Convenience umbrella for the whole library.

#include "anomap/config.hpp"
#include "anomap/errors.hpp"
#include "anomap/imageops.hpp"
#include "anomap/manifest.hpp"
#include "anomap/metrics.hpp"
#include "anomap/mvol.hpp"
#include "anomap/parallel.hpp"
#include "anomap/phantom.hpp"
#include "anomap/pipeline.hpp"
#include "anomap/rng.hpp"
#include "anomap/runconfig.hpp"
#include "anomap/scoring.hpp"
#include "anomap/volume.hpp"
