#pragma once

#include "cvbell/bell.hpp"
#include "cvbell/errors.hpp"
#include "cvbell/fock.hpp"
#include "cvbell/format.hpp"
#include "cvbell/gaussian.hpp"
#include "cvbell/optimize.hpp"
#include "cvbell/protocol.hpp"
#include "cvbell/sources.hpp"
