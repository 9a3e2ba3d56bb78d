#pragma once

#include "rdmix/adaptivity.hpp"
#include "rdmix/assembly.hpp"
#include "rdmix/basis.hpp"
#include "rdmix/config.hpp"
#include "rdmix/dofs.hpp"
#include "rdmix/driver.hpp"
#include "rdmix/error.hpp"
#include "rdmix/imex.hpp"
#include "rdmix/linalg.hpp"
#include "rdmix/mesh.hpp"
#include "rdmix/models.hpp"
#include "rdmix/output.hpp"
#include "rdmix/polynomials.hpp"
#include "rdmix/quadrature.hpp"
#include "rdmix/sparse.hpp"
