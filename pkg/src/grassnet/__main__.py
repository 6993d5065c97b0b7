from grassnet.cli import main

raise SystemExit(main())
