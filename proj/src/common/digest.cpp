#include "smartclass/common/digest.hpp"

#include <openssl/sha.h>

#include "smartclass/common/text.hpp"

namespace smartclass {

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
    return text::to_hex(md, sizeof md);
}

}  // namespace smartclass
