from expotest.cli import main

raise SystemExit(main())
