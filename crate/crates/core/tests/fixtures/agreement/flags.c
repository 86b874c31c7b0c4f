#include <assert.h>
#include <stdbool.h>

bool nondet_bool(void);

int main(void) {
    bool a = nondet_bool();
    bool b = nondet_bool();
    int both = a && b;
    int either = a || b;
    assert(both <= either);
    assert(!(both && !either));
    assert(either == 1);
    return 0;
}
