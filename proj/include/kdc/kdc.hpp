#pragma once

#include "kdc/bounds.hpp"
#include "kdc/certificate.hpp"
#include "kdc/errors.hpp"
#include "kdc/experiments.hpp"
#include "kdc/graph_model.hpp"
#include "kdc/io.hpp"
#include "kdc/linalg.hpp"
#include "kdc/sdp_solver.hpp"
