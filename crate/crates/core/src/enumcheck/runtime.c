#define _GNU_SOURCE
#include <signal.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <sys/mman.h>
#include <sys/time.h>
#include <sys/wait.h>
#include <unistd.h>

#define MAX_CHOICES 512
#define MAX_LOOPS 4096
#define EXIT_UNWIND 87
#define EXIT_CHOICES 88

struct shared {
    int n;
    int plen;
    int unwind_loop;
    long size[MAX_CHOICES];
    long val[MAX_CHOICES];
    long lo[MAX_CHOICES];
};

static struct shared *sh;
static long dom_lo = -3, dom_hi = 3;
static long unwind = 0;
static int unwind_assert = 0;
static long loop_count[MAX_LOOPS];

int __enum_user_main();

long __enum_choose(long lo, long hi)
{
    int k = sh->n;
    if (k >= MAX_CHOICES)
        _exit(EXIT_CHOICES);
    if (hi < lo)
        hi = lo;
    long v = k < sh->plen ? sh->val[k] : 0;
    sh->val[k] = v;
    sh->size[k] = hi - lo + 1;
    sh->lo[k] = lo;
    sh->n = k + 1;
    return lo + v;
}

static long ulo(void) { return dom_lo < 0 ? 0 : dom_lo; }
static long uhi(void) { return dom_hi < 0 ? 0 : dom_hi; }

int nondet_int(void) { return (int)__enum_choose(dom_lo, dom_hi); }
unsigned int nondet_uint(void) { return (unsigned int)__enum_choose(ulo(), uhi()); }
unsigned int nondet_unsigned(void) { return nondet_uint(); }
_Bool nondet_bool(void) { return (_Bool)__enum_choose(0, 1); }
char nondet_char(void) { return (char)__enum_choose(dom_lo, dom_hi); }
unsigned char nondet_uchar(void) { return (unsigned char)__enum_choose(ulo(), uhi()); }
short nondet_short(void) { return (short)__enum_choose(dom_lo, dom_hi); }
unsigned short nondet_ushort(void) { return (unsigned short)__enum_choose(ulo(), uhi()); }
long nondet_long(void) { return __enum_choose(dom_lo, dom_hi); }
unsigned long nondet_ulong(void) { return (unsigned long)__enum_choose(ulo(), uhi()); }
int __VERIFIER_nondet_int(void) { return nondet_int(); }
unsigned int __VERIFIER_nondet_uint(void) { return nondet_uint(); }
_Bool __VERIFIER_nondet_bool(void) { return nondet_bool(); }
char __VERIFIER_nondet_char(void) { return nondet_char(); }
long __VERIFIER_nondet_long(void) { return nondet_long(); }

void __CPROVER_assume(_Bool c) { if (!c) exit(0); }
void __ESBMC_assume(_Bool c) { if (!c) exit(0); }
void __VERIFIER_assume(int c) { if (!c) exit(0); }

int __enum_loop_enter(int loop)
{
    if (loop >= 0 && loop < MAX_LOOPS)
        loop_count[loop] = 0;
    return 0;
}

int __enum_loop_cond(int loop, int value)
{
    if (loop < 0 || loop >= MAX_LOOPS)
        return value;
    if (!value) {
        loop_count[loop] = 0;
        return 0;
    }
    if (unwind > 0 && ++loop_count[loop] > unwind) {
        if (!unwind_assert)
            exit(0);
        sh->unwind_loop = loop;
        _exit(EXIT_UNWIND);
    }
    return 1;
}

static long env_long(const char *name, long def)
{
    const char *s = getenv(name);
    return s && *s ? strtol(s, NULL, 10) : def;
}

static void print_trace(void)
{
    printf("Trace for enumerated execution:\n");
    for (int i = 0; i < sh->n; i++)
        printf("  input %d = %ld\n", i + 1, sh->lo[i] + sh->val[i]);
}

static void print_stderr_tail(int fd)
{
    char buf[1024];
    off_t end = lseek(fd, 0, SEEK_END);
    off_t from = end > (off_t)sizeof buf - 1 ? end - (off_t)sizeof buf + 1 : 0;
    ssize_t got = pread(fd, buf, sizeof buf - 1, from);
    if (got > 0) {
        buf[got] = 0;
        printf("Program stderr: %s%s", buf, buf[got - 1] == '\n' ? "" : "\n");
    }
}

int main(int argc, char **argv)
{
    dom_lo = env_long("COFACT_ENUM_LO", -3);
    dom_hi = env_long("COFACT_ENUM_HI", 3);
    unwind = env_long("COFACT_ENUM_UNWIND", 0);
    unwind_assert = (int)env_long("COFACT_ENUM_UNWIND_ASSERT", 0);
    long max_runs = env_long("COFACT_ENUM_MAX_RUNS", 200000);
    long run_ms = env_long("COFACT_ENUM_RUN_MS", 2000);

    sh = mmap(NULL, sizeof *sh, PROT_READ | PROT_WRITE, MAP_SHARED | MAP_ANONYMOUS, -1, 0);
    if (sh == MAP_FAILED) {
        perror("mmap");
        return 6;
    }
    FILE *errf = tmpfile();
    int devnull = open("/dev/null", 1);
    if (!errf || devnull < 0) {
        perror("enumcheck");
        return 6;
    }
    int efd = fileno(errf);
    sh->plen = 0;
    long runs = 0;

    for (;;) {
        if (runs >= max_runs) {
            printf("Enumeration budget of %ld runs exhausted\nVERIFICATION INCONCLUSIVE\n", max_runs);
            return 5;
        }
        runs++;
        sh->n = 0;
        sh->unwind_loop = -1;
        if (ftruncate(efd, 0) != 0 || lseek(efd, 0, SEEK_SET) != 0) {
            perror("enumcheck");
            return 6;
        }
        fflush(stdout);
        pid_t pid = fork();
        if (pid < 0) {
            perror("fork");
            return 6;
        }
        if (pid == 0) {
            dup2(devnull, 1);
            dup2(efd, 2);
            struct itimerval t = {{0, 0}, {run_ms / 1000, (run_ms % 1000) * 1000}};
            setitimer(ITIMER_REAL, &t, NULL);
            exit(((int (*)(int, char **))__enum_user_main)(argc, argv));
        }
        int status;
        while (waitpid(pid, &status, 0) < 0)
            ;
        if (WIFSIGNALED(status)) {
            int sig = WTERMSIG(status);
            if (sig == SIGABRT) {
                print_trace();
                print_stderr_tail(efd);
                printf("Violated property: assertion\nEnumerated %ld executions\n\nVERIFICATION FAILED\n", runs);
                return 10;
            }
            print_trace();
            printf("Execution ended by signal %d (%s)\nVERIFICATION INCONCLUSIVE\n", sig,
                   sig == SIGALRM ? "per-execution time limit" : strsignal(sig));
            return 5;
        }
        if (WEXITSTATUS(status) == EXIT_UNWIND && sh->unwind_loop >= 0) {
            print_trace();
            printf("Violated property: unwinding assertion loop.%d\nEnumerated %ld executions\n\nVERIFICATION FAILED\n",
                   sh->unwind_loop, runs);
            return 10;
        }
        if (WEXITSTATUS(status) == EXIT_CHOICES && sh->n >= MAX_CHOICES) {
            printf("More than %d nondeterministic choices in one execution\nVERIFICATION INCONCLUSIVE\n", MAX_CHOICES);
            return 5;
        }
        int i = sh->n - 1;
        while (i >= 0 && sh->val[i] + 1 >= sh->size[i])
            i--;
        if (i < 0) {
            printf("Enumerated %ld executions\n\nVERIFICATION SUCCESSFUL\n", runs);
            return 0;
        }
        sh->val[i]++;
        sh->plen = i + 1;
    }
}
