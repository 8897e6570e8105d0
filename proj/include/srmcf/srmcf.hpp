#pragma once

#include "srmcf/common.hpp"
#include "srmcf/group.hpp"
#include "srmcf/field.hpp"
#include "srmcf/flow.hpp"
#include "srmcf/barriers.hpp"
#include "srmcf/sweep.hpp"
#include "srmcf/phi.hpp"
#include "srmcf/io.hpp"
#include "srmcf/config.hpp"
#include "srmcf/inpaint.hpp"
#include "srmcf/app.hpp"
