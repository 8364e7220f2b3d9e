#include <stdio.h>
#include <string.h>

#include "metamodel.h"

int main(void) {
    MmSystem *sys = NULL;
    char *state = NULL;
    uint8_t rules[256];
    size_t count = 0;
    int ok;

    if (mm_ca_system_new(110, "0000000000000001000000000000000", &sys) != MM_STATUS_OK) {
        fprintf(stderr, "%s\n", mm_last_error());
        return 1;
    }
    mm_system_step(sys, 15);
    mm_system_state(sys, &state);
    ok = strcmp(state, "1101011001111101000000000000000") == 0;
    printf("%s\n", state);
    mm_string_free(state);
    mm_system_free(sys);

    if (mm_ca_system_new(300, "010", &sys) != MM_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    printf("error %s\n", mm_last_error());

    mm_ca_enumerate("0000000000000001000000000000000", "1101011001111101000000000000000", 15, rules, &count);
    printf("count %zu rule %u\n", count, (unsigned)rules[0]);
    return ok && count == 1 && rules[0] == 110 ? 0 : 1;
}
