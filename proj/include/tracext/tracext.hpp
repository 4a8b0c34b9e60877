#pragma once

#include "besov.hpp"
#include "cone_chain.hpp"
#include "curve.hpp"
#include "domain.hpp"
#include "error.hpp"
#include "families.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "gradient.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "space.hpp"
#include "trace_extension.hpp"
#include "whitney.hpp"
