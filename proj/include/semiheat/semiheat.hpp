#pragma once

#include "semiheat/util.hpp"
#include "semiheat/graph_space.hpp"
#include "semiheat/quadrature.hpp"
#include "semiheat/spectral.hpp"
#include "semiheat/norms.hpp"
#include "semiheat/paraproducts.hpp"
#include "semiheat/noise.hpp"
#include "semiheat/pam.hpp"
#include "semiheat/config.hpp"
#include "semiheat/io.hpp"
#include "semiheat/commands.hpp"
