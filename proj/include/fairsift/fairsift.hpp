#pragma once

#include "fairsift/association.hpp"
#include "fairsift/dataset.hpp"
#include "fairsift/debias.hpp"
#include "fairsift/encoding.hpp"
#include "fairsift/error.hpp"
#include "fairsift/logistic.hpp"
#include "fairsift/metrics.hpp"
#include "fairsift/pipeline.hpp"
#include "fairsift/reweighing.hpp"
#include "fairsift/schema.hpp"
