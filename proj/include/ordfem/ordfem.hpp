#pragma once

#include "ordfem/analysis.hpp"
#include "ordfem/assembly.hpp"
#include "ordfem/cli.hpp"
#include "ordfem/core.hpp"
#include "ordfem/interp.hpp"
#include "ordfem/mesh.hpp"
#include "ordfem/quadrature.hpp"
#include "ordfem/solver.hpp"
#include "ordfem/sparse.hpp"
#include "ordfem/spaces.hpp"
