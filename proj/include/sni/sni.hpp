#ifndef SNI_SNI_HPP
#define SNI_SNI_HPP

#include "sni/core.hpp"
#include "sni/datagen.hpp"
#include "sni/decomp.hpp"
#include "sni/fem.hpp"
#include "sni/geometry.hpp"
#include "sni/io.hpp"
#include "sni/parallel.hpp"
#include "sni/schwarz.hpp"
#include "sni/surrogate.hpp"
#include "sni/symmetry.hpp"
#include "sni/verify.hpp"

#endif  // SNI_SNI_HPP
