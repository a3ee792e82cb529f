int is_prime(int n);

int main(void) {
  static const int primes[] = {2, 3, 5, 13, 97, 7919};
  static const int others[] = {-7, 0, 1, 4, 91, 7917};
  for (unsigned i = 0; i < sizeof(primes) / sizeof(primes[0]); i++) {
    if (!is_prime(primes[i])) return 1;
  }
  for (unsigned i = 0; i < sizeof(others) / sizeof(others[0]); i++) {
    if (is_prime(others[i])) return 2;
  }
  return 0;
}
