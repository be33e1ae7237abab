#pragma once

#include "portraitforge/analysis.hpp"
#include "portraitforge/constructors.hpp"
#include "portraitforge/continuation.hpp"
#include "portraitforge/expr.hpp"
#include "portraitforge/local_models.hpp"
#include "portraitforge/mapspec.hpp"
#include "portraitforge/numeric.hpp"
#include "portraitforge/portrait.hpp"
#include "portraitforge/portrait_io.hpp"
#include "portraitforge/svg.hpp"
