#pragma once

#include "randcrowns/error.hpp"
#include "randcrowns/geometry.hpp"
#include "randcrowns/regions.hpp"
#include "randcrowns/metrics.hpp"
#include "randcrowns/matching.hpp"
#include "randcrowns/experiments.hpp"
#include "randcrowns/annotations_io.hpp"
#include "randcrowns/config.hpp"
