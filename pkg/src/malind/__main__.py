from malind.cli import main

main()
