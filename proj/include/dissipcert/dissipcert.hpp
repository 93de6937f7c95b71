#pragma once

#include "corpus.hpp"
#include "dissipativity.hpp"
#include "errors.hpp"
#include "hyperplane.hpp"
#include "io.hpp"
#include "log.hpp"
#include "numeric.hpp"
#include "oracle.hpp"
#include "spectra.hpp"
#include "transfer.hpp"
