/* Declarations seen by the program under test. */
int nondet_int(void);
unsigned int nondet_uint(void);
unsigned int nondet_unsigned(void);
_Bool nondet_bool(void);
char nondet_char(void);
unsigned char nondet_uchar(void);
short nondet_short(void);
unsigned short nondet_ushort(void);
long nondet_long(void);
unsigned long nondet_ulong(void);
int __VERIFIER_nondet_int(void);
unsigned int __VERIFIER_nondet_uint(void);
_Bool __VERIFIER_nondet_bool(void);
char __VERIFIER_nondet_char(void);
long __VERIFIER_nondet_long(void);
void __CPROVER_assume(_Bool assumption);
void __ESBMC_assume(_Bool assumption);
void __VERIFIER_assume(int assumption);
int __enum_loop_cond(int loop, int value);
int __enum_loop_enter(int loop);
