#ifndef GFGL_GFGL_HPP_
#define GFGL_GFGL_HPP_

#include "gfgl/evaluate.hpp"
#include "gfgl/matops.hpp"
#include "gfgl/reference.hpp"
#include "gfgl/segmentation.hpp"
#include "gfgl/simulate.hpp"
#include "gfgl/solver.hpp"
#include "gfgl/stationarity.hpp"
#include "gfgl/types.hpp"

#endif  // GFGL_GFGL_HPP_
