#pragma once

#include "bosegas/samplers/chain.hpp"
#include "bosegas/samplers/combinatorics.hpp"
#include "bosegas/samplers/dlr.hpp"
#include "bosegas/samplers/ideal.hpp"
#include "bosegas/samplers/oracle.hpp"
