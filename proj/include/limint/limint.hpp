#pragma once

#include "limint/legendre.hpp"
#include "limint/problems.hpp"
#include "limint/tableau.hpp"
#include "limint/solvers.hpp"
#include "limint/step.hpp"
#include "limint/integrate.hpp"
#include "limint/fit.hpp"
