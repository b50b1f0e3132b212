#pragma once

#include "sphericity/bounds.hpp"
#include "sphericity/classical.hpp"
#include "sphericity/cumulants.hpp"
#include "sphericity/design.hpp"
#include "sphericity/edgeworth.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/io.hpp"
#include "sphericity/mc.hpp"
#include "sphericity/model.hpp"
#include "sphericity/quadrature.hpp"
#include "sphericity/rng.hpp"
#include "sphericity/specfun.hpp"
#include "sphericity/tables.hpp"
