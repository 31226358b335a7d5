#pragma once

#include "structured_harvest/adjoint.hpp"
#include "structured_harvest/grid.hpp"
#include "structured_harvest/model.hpp"
#include "structured_harvest/policy.hpp"
#include "structured_harvest/replacement.hpp"
#include "structured_harvest/search.hpp"
#include "structured_harvest/steady.hpp"
#include "structured_harvest/transport.hpp"
