#pragma once

#include "cwds/config.hpp"
#include "cwds/controller.hpp"
#include "cwds/error.hpp"
#include "cwds/fbp.hpp"
#include "cwds/geometry.hpp"
#include "cwds/image.hpp"
#include "cwds/io.hpp"
#include "cwds/pdfp.hpp"
#include "cwds/phantom.hpp"
#include "cwds/random.hpp"
#include "cwds/system_matrix.hpp"
#include "cwds/wavelet.hpp"
