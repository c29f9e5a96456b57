#pragma once

#include "detopt/certificate_io.hpp"
#include "detopt/crn.hpp"
#include "detopt/engine.hpp"
#include "detopt/linalg.hpp"
#include "detopt/parser.hpp"
#include "detopt/seqnet.hpp"
