#pragma once

#include "optspace/error.hpp"
#include "optspace/experiment.hpp"
#include "optspace/manifold.hpp"
#include "optspace/matrix_market.hpp"
#include "optspace/optimizer.hpp"
#include "optspace/sparse.hpp"
#include "optspace/spectral_init.hpp"
#include "optspace/synth.hpp"
#include "optspace/theory.hpp"
