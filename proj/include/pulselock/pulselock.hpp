#pragma once

#include "pulselock/bloch.hpp"
#include "pulselock/complex_gamma.hpp"
#include "pulselock/config.hpp"
#include "pulselock/ensemble.hpp"
#include "pulselock/master_equation.hpp"
#include "pulselock/nuclear.hpp"
#include "pulselock/pulse.hpp"
#include "pulselock/pulse_ode.hpp"
#include "pulselock/runner.hpp"
#include "pulselock/table.hpp"
#include "pulselock/units.hpp"
#include "pulselock/version.hpp"
