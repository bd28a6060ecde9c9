#pragma once

#include "epdiff/convolution.hpp"
#include "epdiff/dynamics.hpp"
#include "epdiff/field_io.hpp"
#include "epdiff/flow.hpp"
#include "epdiff/fourier_multiplier.hpp"
#include "epdiff/frequency_grid.hpp"
#include "epdiff/geodesic.hpp"
#include "epdiff/harness.hpp"
#include "epdiff/runge_kutta.hpp"
#include "epdiff/sampling.hpp"
#include "epdiff/spectral_field.hpp"
