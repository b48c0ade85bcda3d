#pragma once

#include "clotseg/classifier.hpp"
#include "clotseg/commands.hpp"
#include "clotseg/error.hpp"
#include "clotseg/filters.hpp"
#include "clotseg/image.hpp"
#include "clotseg/image_io.hpp"
#include "clotseg/phantom.hpp"
#include "clotseg/png.hpp"
#include "clotseg/random.hpp"
#include "clotseg/report.hpp"
#include "clotseg/roi.hpp"
#include "clotseg/segmentation.hpp"
#include "clotseg/service.hpp"
