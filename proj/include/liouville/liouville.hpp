#pragma once

#include "liouville/energy.hpp"
#include "liouville/errors.hpp"
#include "liouville/matrix.hpp"
#include "liouville/meanfield.hpp"
#include "liouville/radial.hpp"
