#pragma once

#include "ensvqe/errors.hpp"
#include "ensvqe/pauli.hpp"
#include "ensvqe/statevector.hpp"
#include "ensvqe/dense.hpp"
#include "ensvqe/fermion.hpp"
#include "ensvqe/fcidump.hpp"
#include "ensvqe/qdft.hpp"
#include "ensvqe/ansatz.hpp"
#include "ensvqe/ensemble.hpp"
#include "ensvqe/optimizer.hpp"
#include "ensvqe/stats.hpp"
#include "ensvqe/harness.hpp"
