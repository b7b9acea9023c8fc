#pragma once

#include "rbmsat/cnf.hpp"
#include "rbmsat/dimacs.hpp"
#include "rbmsat/formula_rbm.hpp"
#include "rbmsat/gibbs.hpp"
#include "rbmsat/matrix.hpp"
#include "rbmsat/or_gate.hpp"
#include "rbmsat/output.hpp"
#include "rbmsat/random.hpp"
#include "rbmsat/score.hpp"
#include "rbmsat/solver.hpp"
#include "rbmsat/unit_prop.hpp"
#include "rbmsat/weight_bank.hpp"
