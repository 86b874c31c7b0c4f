/* Bubble sort over at most MAX_N nondeterministic integers.
 * Loop bounds are tight for an unwind bound of 5. */
#include <assert.h>
#include <stdbool.h>

#define MAX_N 4

int nondet_int(void);

bool is_sorted_non_dec(int arr[], int n) {
    for (int k = 0; k + 1 < n; k++) {
        if (arr[k] > arr[k + 1]) {
            return false;
        }
    }
    return true;
}

void bubble_sort(int arr[], int n, int *total_swaps) {
    int i, j, swapped;
    int local_total_swaps = 0;

    for (i = 0; i < n - 1; i++) {
        swapped = 0;
        for (j = 0; j < n - 1 - i; j++) {
            if (arr[j] > arr[j + 1]) {
                int tmp = arr[j];
                arr[j] = arr[j + 1];
                arr[j + 1] = tmp;
                local_total_swaps++;
                swapped = 1;
            }
        }
        if (!swapped) break;
    }
    *total_swaps = local_total_swaps;
}

int main(void) {
    int arr[MAX_N];
    int total_swaps = 0;
    int n = nondet_int();
    if (n < 1 || n > MAX_N) {
        return 1;
    }
    for (int i = 0; i < n; i++) {
        arr[i] = nondet_int();
        if (arr[i] < -8 || arr[i] > 8) {
            return 1;
        }
    }
    bubble_sort(arr, n, &total_swaps);
    return 0;
}
