#pragma once

#include "derham/errors.hpp"
#include "derham/random.hpp"
#include "derham/sparse/csr_matrix.hpp"
#include "derham/sparse/operator_expr.hpp"
#include "derham/sparse/orthonormalize.hpp"
#include "derham/sparse/vector.hpp"
#include "derham/precond/ilu0.hpp"
#include "derham/precond/preconditioner.hpp"
#include "derham/solvers/lobpcg.hpp"
#include "derham/solvers/pcg.hpp"
#include "derham/solvers/trace.hpp"
#include "derham/constrained/equivalent.hpp"
#include "derham/constrained/harmonic.hpp"
#include "derham/constrained/kind.hpp"
#include "derham/constrained/operators.hpp"
#include "derham/constrained/penalty.hpp"
#include "derham/constrained/residual.hpp"
#include "derham/constrained/system.hpp"
#include "derham/fem/assemble.hpp"
#include "derham/fem/incidence.hpp"
#include "derham/fem/mass.hpp"
#include "derham/fem/mesh.hpp"
#include "derham/fem/rhs.hpp"
#include "derham/io/matrix_market.hpp"
#include "derham/io/system_io.hpp"
#include "derham/oracle/dense.hpp"
#include "derham/oracle/oracle.hpp"
