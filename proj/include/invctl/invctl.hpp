#pragma once

#include "invctl/bounds.hpp"
#include "invctl/config.hpp"
#include "invctl/controller.hpp"
#include "invctl/error.hpp"
#include "invctl/harness.hpp"
#include "invctl/interpolant.hpp"
#include "invctl/kernels.hpp"
#include "invctl/level_sets.hpp"
#include "invctl/narx_data.hpp"
#include "invctl/noise.hpp"
#include "invctl/plants.hpp"
#include "invctl/properties.hpp"
#include "invctl/types.hpp"
