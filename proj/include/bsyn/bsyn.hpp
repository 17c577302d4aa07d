#pragma once

#include "bsyn/assimilation.hpp"
#include "bsyn/dynamics.hpp"
#include "bsyn/errors.hpp"
#include "bsyn/fft.hpp"
#include "bsyn/field.hpp"
#include "bsyn/grid.hpp"
#include "bsyn/integrator.hpp"
#include "bsyn/interpolants.hpp"
#include "bsyn/io/binary.hpp"
#include "bsyn/io/config.hpp"
#include "bsyn/io/csv.hpp"
#include "bsyn/io/manifest.hpp"
#include "bsyn/random_fields.hpp"
#include "bsyn/verify.hpp"
