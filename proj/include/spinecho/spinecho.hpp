// Umbrella header

#pragma once

#include "spinecho/analysis.hpp"
#include "spinecho/diagnostics.hpp"
#include "spinecho/ensemble.hpp"
#include "spinecho/hilbert.hpp"
#include "spinecho/io.hpp"
#include "spinecho/model.hpp"
#include "spinecho/onebody.hpp"
#include "spinecho/propagate.hpp"
#include "spinecho/protocols.hpp"
