#include "stag/transforms.hpp"

namespace stag {

template class DctBasisT<double>;
template class DctBasisT<float>;

}  // namespace stag
