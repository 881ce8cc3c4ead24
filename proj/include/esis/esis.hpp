#pragma once

#include "esis/checksum.hpp"
#include "esis/dissect.hpp"
#include "esis/engine.hpp"
#include "esis/octets.hpp"
#include "esis/pdu.hpp"
#include "esis/rib.hpp"
#include "esis/scenario.hpp"
#include "esis/subnet_sim.hpp"
