#pragma once

#include "tu1/decomposition.hpp"
#include "tu1/io.hpp"
#include "tu1/mask.hpp"
#include "tu1/norms.hpp"
#include "tu1/solver.hpp"
#include "tu1/sweep.hpp"
#include "tu1/synthetic.hpp"
#include "tu1/tensor.hpp"
#include "tu1/transforms.hpp"

// image_io.hpp is opt-in: it pulls in OpenCV.
