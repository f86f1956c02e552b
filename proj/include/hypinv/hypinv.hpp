#pragma once

#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/contour.hpp"
#include "hypinv/resolvent.hpp"
#include "hypinv/parallel.hpp"
#include "hypinv/projection.hpp"
#include "hypinv/random.hpp"
#include "hypinv/hypotheses.hpp"
#include "hypinv/commutant.hpp"
#include "hypinv/scenario.hpp"
#include "hypinv/verify.hpp"
#include "hypinv/digest.hpp"
#include "hypinv/matrix_io.hpp"
#include "hypinv/report.hpp"
#include "hypinv/config.hpp"
#include "hypinv/commands.hpp"
#include "hypinv/corpus.hpp"
